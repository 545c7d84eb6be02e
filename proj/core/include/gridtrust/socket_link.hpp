#pragma once

// Local byte-stream transport between an EMS and its device agent: an
// AF_UNIX socket pair carrying one JSON envelope per line, with the agent
// served from its own thread.

#include <chrono>
#include <optional>
#include <string>
#include <thread>

#include "gridtrust/device_agent.hpp"
#include "gridtrust/ems.hpp"

namespace gridtrust::device {

class SocketLink {
 public:
  explicit SocketLink(DeviceAgent& agent,
                      std::chrono::milliseconds reply_timeout = std::chrono::milliseconds(2000));
  ~SocketLink();

  SocketLink(const SocketLink&) = delete;
  SocketLink& operator=(const SocketLink&) = delete;

  std::optional<std::string> exchange(const std::string& line);
  ems::DeviceLink as_device_link();

 private:
  void serve();

  DeviceAgent& agent_;
  std::chrono::milliseconds timeout_;
  int client_fd_ = -1;
  int server_fd_ = -1;
  std::string client_buffer_;
  std::thread server_;
};

}  // namespace gridtrust::device
