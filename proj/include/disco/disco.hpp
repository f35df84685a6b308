#pragma once

#include "disco/config.hpp"
#include "disco/diffusion.hpp"
#include "disco/dqn.hpp"
#include "disco/embedding.hpp"
#include "disco/error.hpp"
#include "disco/generators.hpp"
#include "disco/graph.hpp"
#include "disco/pipeline.hpp"
#include "disco/rng.hpp"
#include "disco/sampling.hpp"
#include "disco/selection.hpp"
