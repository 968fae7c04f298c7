#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/fitness/agent.hpp"

namespace evorl::algo {

/// Built-in ids: "cgfpd", "cgfpd+bootstrap", "dfcwpcp".
const std::vector<std::string>& algorithm_ids();
bool is_algorithm(const std::string& id);

/// Scalar registry of a built-in algorithm. Throws std::invalid_argument for
/// an unknown id.
ParamRegistry registry_for(const std::string& id);

/// Builds an agent with `values` applied on top of the defaults.
std::unique_ptr<fitness::Agent> make_agent(const std::string& id, const env::EnvSpec& spec, std::uint64_t seed,
                                           const ParamValues& values = {});

fitness::AgentFactory agent_factory(const std::string& id, const ParamValues& values = {});

}  // namespace evorl::algo
