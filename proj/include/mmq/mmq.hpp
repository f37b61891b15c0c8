#pragma once

#include "mmq/errors.hpp"
#include "mmq/rng.hpp"
#include "mmq/game_model.hpp"
#include "mmq/game_io.hpp"
#include "mmq/operators.hpp"
#include "mmq/value_iteration.hpp"
#include "mmq/q_learning.hpp"
#include "mmq/comparison_systems.hpp"
#include "mmq/bounds.hpp"
#include "mmq/experiment.hpp"
