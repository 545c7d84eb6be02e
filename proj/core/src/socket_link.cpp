#include "gridtrust/socket_link.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "gridtrust/error.hpp"

namespace gridtrust::device {

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads until a full line is buffered. Returns false on EOF, error or
// timeout (negative timeout blocks).
bool read_line(int fd, std::string& buffer, std::string& line, int timeout_ms) {
  for (;;) {
    if (auto nl = buffer.find('\n'); nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, timeout_ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return false;
    char chunk[4096];
    auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

SocketLink::SocketLink(DeviceAgent& agent, std::chrono::milliseconds reply_timeout)
    : agent_(agent), timeout_(reply_timeout) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(Errc::FileUnreadable, std::string("socketpair: ") + std::strerror(errno));
  }
  client_fd_ = fds[0];
  server_fd_ = fds[1];
  server_ = std::thread([this] { serve(); });
}

SocketLink::~SocketLink() {
  ::shutdown(client_fd_, SHUT_RDWR);
  ::close(client_fd_);
  if (server_.joinable()) server_.join();
  ::close(server_fd_);
}

void SocketLink::serve() {
  std::string buffer;
  std::string line;
  while (read_line(server_fd_, buffer, line, -1)) {
    if (!write_all(server_fd_, agent_.handle_text(line) + "\n")) break;
  }
}

std::optional<std::string> SocketLink::exchange(const std::string& line) {
  if (!write_all(client_fd_, line + "\n")) return std::nullopt;
  std::string reply;
  if (!read_line(client_fd_, client_buffer_, reply, static_cast<int>(timeout_.count()))) {
    return std::nullopt;
  }
  return reply;
}

ems::DeviceLink SocketLink::as_device_link() {
  return [this](const std::string& line) { return exchange(line); };
}

}  // namespace gridtrust::device
