// Umbrella header.
#pragma once

#include "rrae/adam.hpp"
#include "rrae/checkpoint.hpp"
#include "rrae/compressor.hpp"
#include "rrae/dense.hpp"
#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"
#include "rrae/eval_report.hpp"
#include "rrae/loss.hpp"
#include "rrae/matrix.hpp"
#include "rrae/model.hpp"
#include "rrae/preprocess.hpp"
#include "rrae/rng.hpp"
#include "rrae/rrnn.hpp"
#include "rrae/sv_io.hpp"
#include "rrae/trainer.hpp"
