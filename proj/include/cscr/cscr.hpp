#pragma once

#include "cscr/channel.hpp"
#include "cscr/engine.hpp"
#include "cscr/experiment.hpp"
#include "cscr/metric.hpp"
#include "cscr/model.hpp"
#include "cscr/protocols.hpp"
#include "cscr/pu_activity.hpp"
#include "cscr/rng.hpp"
#include "cscr/selection.hpp"
