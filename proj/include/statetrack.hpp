#pragma once

#include "statetrack/annotation.hpp"
#include "statetrack/backend.hpp"
#include "statetrack/error.hpp"
#include "statetrack/hash.hpp"
#include "statetrack/hungarian.hpp"
#include "statetrack/io.hpp"
#include "statetrack/judge.hpp"
#include "statetrack/mask.hpp"
#include "statetrack/metrics.hpp"
#include "statetrack/partition.hpp"
#include "statetrack/pipeline.hpp"
#include "statetrack/reasoning.hpp"
#include "statetrack/replay.hpp"
#include "statetrack/scenario.hpp"
#include "statetrack/scenario_families.hpp"
#include "statetrack/simulator.hpp"
#include "statetrack/stategraph.hpp"
