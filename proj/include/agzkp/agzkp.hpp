// Copyright 2026 The AGZKP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Umbrella header: the whole library.

#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/zkp.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/wire.hpp"
#include "agzkp/revocation.hpp"
#include "agzkp/auth.hpp"
#include "agzkp/montecarlo.hpp"
#include "agzkp/adversary.hpp"
#include "agzkp/analysis.hpp"
#include "agzkp/sim.hpp"

namespace agzkp {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace agzkp
