#pragma once

#include "thermosmc/ensemble.hpp"
#include "thermosmc/hmc.hpp"
#include "thermosmc/model.hpp"
#include "thermosmc/models.hpp"
#include "thermosmc/parallel.hpp"
#include "thermosmc/rng.hpp"
#include "thermosmc/smc.hpp"
