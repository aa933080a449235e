#pragma once

#include "amz/branch.hpp"
#include "amz/certificate.hpp"
#include "amz/cli.hpp"
#include "amz/config.hpp"
#include "amz/error.hpp"
#include "amz/experiments.hpp"
#include "amz/ifs_core.hpp"
#include "amz/measures.hpp"
#include "amz/plot.hpp"
#include "amz/prob_field.hpp"
#include "amz/report.hpp"
#include "amz/rng.hpp"
#include "amz/simulate.hpp"
#include "amz/transfer.hpp"
