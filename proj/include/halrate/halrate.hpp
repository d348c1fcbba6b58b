#ifndef HALRATE_HALRATE_HPP
#define HALRATE_HALRATE_HPP

// Umbrella header: spaces, maps, schedules, iterations and rate certification.

#include "halrate/audit.hpp"
#include "halrate/error.hpp"
#include "halrate/iterations.hpp"
#include "halrate/maps.hpp"
#include "halrate/random.hpp"
#include "halrate/rates.hpp"
#include "halrate/schedule.hpp"
#include "halrate/spaces.hpp"

#endif  // HALRATE_HALRATE_HPP
