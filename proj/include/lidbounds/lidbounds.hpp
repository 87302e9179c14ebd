#pragma once

#include "lidbounds/bounds.hpp"
#include "lidbounds/dataset.hpp"
#include "lidbounds/distance_cdf.hpp"
#include "lidbounds/error.hpp"
#include "lidbounds/experiment.hpp"
#include "lidbounds/geometry.hpp"
#include "lidbounds/io.hpp"
#include "lidbounds/lid.hpp"
#include "lidbounds/metric.hpp"
#include "lidbounds/quadrature.hpp"
#include "lidbounds/random.hpp"
#include "lidbounds/stats.hpp"
#include "lidbounds/surrogate.hpp"
#include "lidbounds/synthetic.hpp"
