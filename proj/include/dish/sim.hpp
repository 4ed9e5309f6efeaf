#pragma once

#include "dish/sim/engine.hpp"
#include "dish/sim/table.hpp"
#include "dish/sim/types.hpp"
