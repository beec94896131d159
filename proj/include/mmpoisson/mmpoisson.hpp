#pragma once

#include "mmpoisson/error.hpp"
#include "mmpoisson/model.hpp"
#include "mmpoisson/rng.hpp"
#include "mmpoisson/parallel.hpp"
#include "mmpoisson/simulator.hpp"
#include "mmpoisson/ramanujan.hpp"
#include "mmpoisson/asymptotics.hpp"
#include "mmpoisson/isotonic.hpp"
#include "mmpoisson/stats.hpp"
#include "mmpoisson/io.hpp"
#include "mmpoisson/estimate.hpp"
#include "mmpoisson/study.hpp"
