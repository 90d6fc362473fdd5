#pragma once

#include "dfa/bench.hpp"
#include "dfa/bloom.hpp"
#include "dfa/bytes.hpp"
#include "dfa/collector.hpp"
#include "dfa/config.hpp"
#include "dfa/core.hpp"
#include "dfa/describe.hpp"
#include "dfa/harness.hpp"
#include "dfa/logapprox.hpp"
#include "dfa/pcap.hpp"
#include "dfa/reporter.hpp"
#include "dfa/traffic.hpp"
#include "dfa/translator.hpp"
#include "dfa/wire.hpp"
