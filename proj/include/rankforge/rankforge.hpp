#pragma once

#include "rankforge/alo.hpp"
#include "rankforge/csv.hpp"
#include "rankforge/dataset.hpp"
#include "rankforge/fit.hpp"
#include "rankforge/hypergrad.hpp"
#include "rankforge/hyperopt.hpp"
#include "rankforge/loss.hpp"
#include "rankforge/normal.hpp"
#include "rankforge/online.hpp"
#include "rankforge/parallel.hpp"
#include "rankforge/params.hpp"
#include "rankforge/serialize.hpp"
#include "rankforge/synth.hpp"
#include "rankforge/thresholds.hpp"
#include "rankforge/version.hpp"
