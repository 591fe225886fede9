#pragma once

#include "ecstream/analysis.hpp"
#include "ecstream/assignment.hpp"
#include "ecstream/baselines.hpp"
#include "ecstream/config_io.hpp"
#include "ecstream/error.hpp"
#include "ecstream/model.hpp"
#include "ecstream/objective.hpp"
#include "ecstream/optimizer.hpp"
#include "ecstream/random.hpp"
#include "ecstream/report.hpp"
#include "ecstream/simulator.hpp"
#include "ecstream/workload.hpp"
