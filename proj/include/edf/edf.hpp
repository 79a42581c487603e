#ifndef EDF_EDF_HPP
#define EDF_EDF_HPP

// Umbrella header for the EDF (Explicitly Deweighted Features) library.

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/fairness.hpp"
#include "edf/forest.hpp"
#include "edf/harness.hpp"
#include "edf/knn.hpp"
#include "edf/ridge.hpp"
#include "edf/serialize.hpp"
#include "edf/stats.hpp"
#include "edf/twostage.hpp"

#endif
