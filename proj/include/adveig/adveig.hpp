#ifndef ADVEIG_ADVEIG_HPP
#define ADVEIG_ADVEIG_HPP

// Umbrella header for the whole library.

#include "adveig/asymptotics.hpp"
#include "adveig/config.hpp"
#include "adveig/corrections.hpp"
#include "adveig/eigensolver.hpp"
#include "adveig/grid.hpp"
#include "adveig/limiting.hpp"
#include "adveig/model.hpp"
#include "adveig/operators.hpp"
#include "adveig/reports.hpp"

#endif  // ADVEIG_ADVEIG_HPP
