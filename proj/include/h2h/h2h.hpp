/* Copyright 2026 The h2h Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"
#include "h2h/io.hpp"
#include "h2h/metrics.hpp"
#include "h2h/model.hpp"
#include "h2h/parallel.hpp"
#include "h2h/raster.hpp"
#include "h2h/recon.hpp"
#include "h2h/reenact.hpp"
#include "h2h/roi.hpp"
