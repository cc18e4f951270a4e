#pragma once

#include "rankone/cbf.hpp"
#include "rankone/conic.hpp"
#include "rankone/datagen.hpp"
#include "rankone/dataset.hpp"
#include "rankone/error.hpp"
#include "rankone/harness.hpp"
#include "rankone/hull.hpp"
#include "rankone/io.hpp"
#include "rankone/mps.hpp"
#include "rankone/numeric.hpp"
#include "rankone/oracle.hpp"
#include "rankone/relaxations.hpp"
#include "rankone/selfcheck.hpp"
#include "rankone/solver.hpp"
#include "rankone/svm.hpp"
