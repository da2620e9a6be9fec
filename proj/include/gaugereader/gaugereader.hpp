#pragma once

#include "gaugereader/core.hpp"
#include "gaugereader/fixtures.hpp"
#include "gaugereader/geometry.hpp"
#include "gaugereader/keypoints.hpp"
#include "gaugereader/pipeline.hpp"
#include "gaugereader/report.hpp"
#include "gaugereader/scale_model.hpp"
#include "gaugereader/synthgauge.hpp"
