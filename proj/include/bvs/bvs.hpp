#pragma once

#include "bvs/adapt.hpp"
#include "bvs/datagen.hpp"
#include "bvs/dataset.hpp"
#include "bvs/diagnostics.hpp"
#include "bvs/enumerate.hpp"
#include "bvs/experiment.hpp"
#include "bvs/gamma.hpp"
#include "bvs/math.hpp"
#include "bvs/model_state.hpp"
#include "bvs/prior.hpp"
#include "bvs/proposals.hpp"
#include "bvs/rng.hpp"
#include "bvs/run.hpp"
#include "bvs/samplers.hpp"
