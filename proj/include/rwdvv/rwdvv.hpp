#pragma once

#include "rwdvv/errors.hpp"
#include "rwdvv/invariants.hpp"
#include "rwdvv/io.hpp"
#include "rwdvv/jets.hpp"
#include "rwdvv/linalg.hpp"
#include "rwdvv/rational.hpp"
#include "rwdvv/series.hpp"
#include "rwdvv/target.hpp"
#include "rwdvv/trr.hpp"
#include "rwdvv/wdvv.hpp"
