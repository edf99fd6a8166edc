#pragma once

#include "privedm/bytes.hpp"
#include "privedm/errors.hpp"
#include "privedm/esp.hpp"
#include "privedm/he/bgn.hpp"
#include "privedm/he/clear.hpp"
#include "privedm/he/scheme.hpp"
#include "privedm/l1_protocol.hpp"
#include "privedm/labeling.hpp"
#include "privedm/oracles.hpp"
#include "privedm/pipeline.hpp"
#include "privedm/random.hpp"
#include "privedm/rolling_hash.hpp"
#include "privedm/transport.hpp"
#include "privedm/two_party.hpp"
