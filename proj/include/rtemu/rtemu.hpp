#pragma once

#include "rtemu/bench.hpp"
#include "rtemu/capture.hpp"
#include "rtemu/channel.hpp"
#include "rtemu/clock.hpp"
#include "rtemu/config.hpp"
#include "rtemu/engine.hpp"
#include "rtemu/event.hpp"
#include "rtemu/fes.hpp"
#include "rtemu/kernel.hpp"
#include "rtemu/log.hpp"
#include "rtemu/netmodel.hpp"
#include "rtemu/packet.hpp"
#include "rtemu/policy.hpp"
#include "rtemu/report.hpp"
#include "rtemu/scheduler.hpp"
#include "rtemu/socket_io.hpp"
#include "rtemu/stats.hpp"
#include "rtemu/test_clock.hpp"
#include "rtemu/time.hpp"
#include "rtemu/topology.hpp"
