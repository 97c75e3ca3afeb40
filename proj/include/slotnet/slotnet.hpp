#pragma once

#include "slotnet/cells.hpp"
#include "slotnet/checkpoint.hpp"
#include "slotnet/common.hpp"
#include "slotnet/config.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/evo.hpp"
#include "slotnet/experiments.hpp"
#include "slotnet/harness.hpp"
#include "slotnet/policy.hpp"
#include "slotnet/rng.hpp"
