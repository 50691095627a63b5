/*
   Copyright 2026 The strata Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "strata/config.hpp"
#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/estimators.hpp"
#include "strata/experiment.hpp"
#include "strata/limit.hpp"
#include "strata/parallel.hpp"
#include "strata/rng.hpp"
#include "strata/stats.hpp"
#include "strata/version.hpp"
#include "strata/walk.hpp"
