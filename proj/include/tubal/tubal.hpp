#pragma once

#include "tubal/error.hpp"
#include "tubal/tensor.hpp"
#include "tubal/tsvd.hpp"
#include "tubal/sampling.hpp"
#include "tubal/solver.hpp"
#include "tubal/experiments.hpp"
#include "tubal/io.hpp"
