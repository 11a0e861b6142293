#pragma once

// Umbrella header: supervised cross-modal hashing with kernelized projections,
// discrete code optimization, and Hamming-ranking evaluation.

#include "dsh/codec.hpp"
#include "dsh/config.hpp"
#include "dsh/data.hpp"
#include "dsh/kernel.hpp"
#include "dsh/optimizer.hpp"
#include "dsh/retrieval.hpp"
#include "dsh/rng.hpp"
#include "dsh/types.hpp"
