#pragma once

#include <cstdint>

#include "satqic/capture.hpp"
#include "satqic/endpoint.hpp"
#include "satqic/linkem.hpp"
#include "satqic/scenarios.hpp"

namespace satqic {

struct SimResult {
  bool completed = false;     // client finished with a full file
  bool error_close = false;   // server closed the connection with an error
  double finish_time = 0.0;   // virtual seconds; timeout value when not completed
  Trace trace;
  std::vector<uint8_t> downloaded;
};

// Runs one client/server pair over the emulated channel on a virtual clock.
// Fully deterministic: the wall clock is never consulted. Capture taps sit on
// both channel ends; after the client completes, in-flight packets are
// drained into the trace so both taps agree.
SimResult run_simulation(const ScenarioSpec& spec, Endpoint& server,
                         ClientEndpoint& client, uint64_t seed,
                         RunIdentity id = {});

}  // namespace satqic
