#pragma once

#include "ccat/checkpoint.hpp"
#include "ccat/decoding.hpp"
#include "ccat/errors.hpp"
#include "ccat/eval_harness.hpp"
#include "ccat/instances.hpp"
#include "ccat/model.hpp"
#include "ccat/optimizer.hpp"
#include "ccat/reference_adder.hpp"
#include "ccat/staged_generator.hpp"
#include "ccat/transformer.hpp"
#include "ccat/vocab.hpp"
