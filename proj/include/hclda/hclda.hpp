#pragma once

#include "hclda/cross_validation.hpp"
#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/experiments.hpp"
#include "hclda/io.hpp"
#include "hclda/lda.hpp"
#include "hclda/linalg.hpp"
#include "hclda/metaclass.hpp"
#include "hclda/random.hpp"
#include "hclda/regression.hpp"
#include "hclda/reports.hpp"
#include "hclda/simulate.hpp"
