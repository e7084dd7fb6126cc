#pragma once

#include "infodyn/ais.hpp"
#include "infodyn/compare.hpp"
#include "infodyn/data.hpp"
#include "infodyn/digamma.hpp"
#include "infodyn/discrete.hpp"
#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"
#include "infodyn/export.hpp"
#include "infodyn/gaussian.hpp"
#include "infodyn/generate.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/io.hpp"
#include "infodyn/knn.hpp"
#include "infodyn/neighbor_index.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/pid.hpp"
#include "infodyn/stats.hpp"
