// Copyright 2026 The opfree Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything except io.hpp and verify.hpp, which pull in nlohmann json.

#ifndef OPFREE_OPFREE_HPP
#define OPFREE_OPFREE_HPP

#include "opfree/error.hpp"
#include "opfree/matcore.hpp"
#include "opfree/opspace.hpp"
#include "opfree/molecule.hpp"
#include "opfree/lipcalc.hpp"
#include "opfree/symbolic.hpp"
#include "opfree/transport.hpp"
#include "opfree/barrier.hpp"
#include "opfree/freenorm.hpp"
#include "opfree/linearize.hpp"
#include "opfree/maxmodel.hpp"

#endif  // OPFREE_OPFREE_HPP
