// Copyright 2026 The qctrack Authors
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


// Convenience header for the numerical core.

#pragma once

#include "qctrack/dmorph.hpp"
#include "qctrack/dynamics.hpp"
#include "qctrack/errors.hpp"
#include "qctrack/estimation.hpp"
#include "qctrack/fields.hpp"
#include "qctrack/gradient_flow.hpp"
#include "qctrack/landscape.hpp"
#include "qctrack/linalg.hpp"
#include "qctrack/obs_track.hpp"
#include "qctrack/trace.hpp"
