#pragma once

#include "qmeanlab/battery.hpp"
#include "qmeanlab/core.hpp"
#include "qmeanlab/distribution_io.hpp"
#include "qmeanlab/estimators_classical.hpp"
#include "qmeanlab/estimators_quantum.hpp"
#include "qmeanlab/fft.hpp"
#include "qmeanlab/gridqft.hpp"
#include "qmeanlab/hardness.hpp"
#include "qmeanlab/harness.hpp"
#include "qmeanlab/invariants.hpp"
#include "qmeanlab/oracles.hpp"
#include "qmeanlab/probspace.hpp"
#include "qmeanlab/rng.hpp"
