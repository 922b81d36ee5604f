#ifndef COALEX_COALEX_HPP
#define COALEX_COALEX_HPP

#include "coalex/core.hpp"
#include "coalex/datasets.hpp"
#include "coalex/distribution.hpp"
#include "coalex/error.hpp"
#include "coalex/explain.hpp"
#include "coalex/inference.hpp"
#include "coalex/model_io.hpp"
#include "coalex/proptest.hpp"
#include "coalex/rca.hpp"
#include "coalex/rng.hpp"
#include "coalex/score.hpp"
#include "coalex/search.hpp"

#endif
