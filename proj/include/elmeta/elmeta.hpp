#pragma once

// Umbrella header for the whole toolkit.

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/elm.hpp"
#include "elmeta/evaluation.hpp"
#include "elmeta/label_search.hpp"
#include "elmeta/linalg.hpp"
#include "elmeta/m5.hpp"
#include "elmeta/meta_features.hpp"
#include "elmeta/meta_learners.hpp"
#include "elmeta/metabase.hpp"
#include "elmeta/pipeline.hpp"
#include "elmeta/stats.hpp"
#include "elmeta/svr.hpp"
