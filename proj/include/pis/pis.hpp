#pragma once

#include "pis/channel.hpp"
#include "pis/config.hpp"
#include "pis/core.hpp"
#include "pis/estimator.hpp"
#include "pis/geometry.hpp"
#include "pis/gmm.hpp"
#include "pis/mdn.hpp"
#include "pis/mobility.hpp"
#include "pis/proposal.hpp"
#include "pis/reward.hpp"
#include "pis/rng.hpp"
#include "pis/bench.hpp"
#include "pis/scenarios.hpp"
#include "pis/sim.hpp"
