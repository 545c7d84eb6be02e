#pragma once

// Small grid for ledger, agent and EMS tests: an IUR, a TE ledger and any
// number of prosumers, each with a provisioned EMS chip and agent chip.

#include <map>
#include <memory>

#include "gridtrust/device_agent.hpp"
#include "gridtrust/ems.hpp"
#include "gridtrust/inverter.hpp"
#include "gridtrust/iur.hpp"
#include "gridtrust/te_ledger.hpp"
#include "test_util.hpp"

namespace testutil {

struct Prosumer {
  TestChip ems_chip;
  TestChip agent_chip;
  std::unique_ptr<gridtrust::device::InverterModel> inverter;
  std::unique_ptr<gridtrust::device::DeviceAgent> agent;
  std::unique_ptr<gridtrust::ems::Ems> ems;
};

struct Grid {
  gridtrust::LogicalClock clock{1000};
  gridtrust::DeterministicRandom rng{31, "iur"};
  gridtrust::DeterministicRandom keys{31, "keys"};
  gridtrust::iur::IurService iur{clock, rng, gridtrust::crypto::Seed{9}};
  gridtrust::te::TeLedger ledger{iur, clock};
  std::map<std::string, std::unique_ptr<Prosumer>> prosumers;
  std::uint64_t next_seed = 1;

  TestChip provisioned_chip(const std::string& id, std::optional<std::string> group) {
    auto t = make_chip(id, keys, clock, next_seed++);
    iur.register_device(id, t.identity.supply_chain_secret, group);
    iur.provision_device(id, gridtrust::chip::direct_pipe(*t.chip));
    return t;
  }

  Prosumer& add(const std::string& id, bool enroll = true,
                gridtrust::device::IrradianceTrace trace = {}) {
    auto p = std::make_unique<Prosumer>();
    p->ems_chip = provisioned_chip(id, id);
    p->agent_chip = provisioned_chip(id + "-agent", id);
    p->inverter = std::make_unique<gridtrust::device::InverterModel>(
        gridtrust::device::InverterParams{}, std::move(trace));
    p->agent = std::make_unique<gridtrust::device::DeviceAgent>(id + "-agent", *p->agent_chip.client,
                                                                *p->inverter, iur);
    auto* agent = p->agent.get();
    p->ems = std::make_unique<gridtrust::ems::Ems>(
        gridtrust::ems::ProsumerConfig{id, 4000}, *p->ems_chip.client, ledger,
        [agent](const std::string& line) -> std::optional<std::string> {
          return agent->handle_text(line);
        });
    if (enroll) p->ems->enroll();
    auto& ref = *p;
    prosumers.emplace(id, std::move(p));
    return ref;
  }

  Prosumer& at(const std::string& id) { return *prosumers.at(id); }
};

}  // namespace testutil
