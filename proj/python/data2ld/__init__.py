# Copyright 2026 The data2ld Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Parameter and solution estimation for linear differential equations."""

try:
    from ._data2ld import fit, h_value, simulate
except ImportError:  # in-tree builds put the module next to the package
    from _data2ld import fit, h_value, simulate

__all__ = ["fit", "h_value", "simulate"]
