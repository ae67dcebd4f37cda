#pragma once

#include "enn/activation.hpp"
#include "enn/curves.hpp"
#include "enn/dataio.hpp"
#include "enn/error.hpp"
#include "enn/experiment.hpp"
#include "enn/loss.hpp"
#include "enn/model.hpp"
#include "enn/optimizer.hpp"
#include "enn/oracle.hpp"
#include "enn/parallel.hpp"
#include "enn/report.hpp"
#include "enn/selection.hpp"
#include "enn/selftest.hpp"
#include "enn/serialize.hpp"
#include "enn/synthetic.hpp"
#include "enn/transfer.hpp"
