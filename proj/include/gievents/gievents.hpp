#pragma once

#include "gievents/anatomy.hpp"
#include "gievents/decoding.hpp"
#include "gievents/evaluation.hpp"
#include "gievents/events.hpp"
#include "gievents/gating.hpp"
#include "gievents/io.hpp"
#include "gievents/label_space.hpp"
#include "gievents/loss.hpp"
#include "gievents/pipeline.hpp"
#include "gievents/synth.hpp"
