#include "evorl/algo/factory.hpp"

#include <algorithm>
#include <stdexcept>

#include "evorl/algo/cgfpd.hpp"
#include "evorl/algo/cgfpd_bootstrap.hpp"
#include "evorl/algo/dfcwpcp.hpp"

namespace evorl::algo {

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids{"cgfpd", "cgfpd+bootstrap", "dfcwpcp"};
  return ids;
}

bool is_algorithm(const std::string& id) {
  const auto& ids = algorithm_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

ParamRegistry registry_for(const std::string& id) {
  if (id == "cgfpd") return CgfpdConfig::registry();
  if (id == "cgfpd+bootstrap") return CgfpdBootstrapAgent::registry();
  if (id == "dfcwpcp") return DfConfig::registry();
  throw std::invalid_argument("unknown algorithm: " + id);
}

std::unique_ptr<fitness::Agent> make_agent(const std::string& id, const env::EnvSpec& spec, std::uint64_t seed,
                                           const ParamValues& values) {
  if (id == "cgfpd") {
    CgfpdConfig config;
    config.apply(values);
    return std::make_unique<CgfpdAgent>(spec, seed, config);
  }
  if (id == "cgfpd+bootstrap") {
    CgfpdConfig config;
    BootstrapConfig bootstrap;
    CgfpdBootstrapAgent::apply(values, config, bootstrap);
    return std::make_unique<CgfpdBootstrapAgent>(spec, seed, config, bootstrap);
  }
  if (id == "dfcwpcp") {
    DfConfig config;
    config.apply(values);
    return std::make_unique<DfcwpcpAgent>(spec, seed, config);
  }
  throw std::invalid_argument("unknown algorithm: " + id);
}

fitness::AgentFactory agent_factory(const std::string& id, const ParamValues& values) {
  if (!is_algorithm(id)) throw std::invalid_argument("unknown algorithm: " + id);
  return [id, values](const env::EnvSpec& spec, std::uint64_t seed) { return make_agent(id, spec, seed, values); };
}

}  // namespace evorl::algo
