#pragma once

#include "npmwf/controls.hpp"
#include "npmwf/covariance.hpp"
#include "npmwf/engine.hpp"
#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"
#include "npmwf/linalg.hpp"
#include "npmwf/masknet.hpp"
#include "npmwf/metrics.hpp"
#include "npmwf/npw1.hpp"
#include "npmwf/pmwf.hpp"
#include "npmwf/report.hpp"
#include "npmwf/stft.hpp"
#include "npmwf/wav.hpp"
