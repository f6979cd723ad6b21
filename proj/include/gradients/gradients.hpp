#pragma once

#include "gradients/archive.hpp"
#include "gradients/corpus.hpp"
#include "gradients/digraph.hpp"
#include "gradients/error.hpp"
#include "gradients/extract.hpp"
#include "gradients/gradient.hpp"
#include "gradients/migration.hpp"
#include "gradients/nullmodel.hpp"
#include "gradients/sim.hpp"
#include "gradients/stats.hpp"
#include "gradients/synthetic.hpp"
#include "gradients/wikipedia.hpp"
