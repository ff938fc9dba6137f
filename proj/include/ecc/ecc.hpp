#pragma once

// Convenience header pulling in the whole library.

#include "ecc/common.hpp"
#include "ecc/corpus.hpp"
#include "ecc/events.hpp"
#include "ecc/knowledge.hpp"
#include "ecc/parallel.hpp"
#include "ecc/pipeline.hpp"
#include "ecc/pmi.hpp"
#include "ecc/temporal.hpp"
#include "ecc/wsc.hpp"
