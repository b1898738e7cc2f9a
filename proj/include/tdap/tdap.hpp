#pragma once

// Time-dependent average positive predictive value for censored cohorts.

#include "tdap/bootstrap.hpp"
#include "tdap/censoring.hpp"
#include "tdap/cohort.hpp"
#include "tdap/error.hpp"
#include "tdap/estimators.hpp"
#include "tdap/simulation.hpp"
