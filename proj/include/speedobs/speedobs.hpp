// Copyright 2026 The speedobs Authors
//
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

// Umbrella header.
#pragma once

#include "speedobs/adaptive_observer.hpp"
#include "speedobs/cli.hpp"
#include "speedobs/config.hpp"
#include "speedobs/dynamics.hpp"
#include "speedobs/geometry.hpp"
#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"
#include "speedobs/rk4.hpp"
#include "speedobs/scaled_observer.hpp"
#include "speedobs/simulation.hpp"
#include "speedobs/svg.hpp"
#include "speedobs/systems.hpp"
