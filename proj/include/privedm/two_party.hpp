#pragma once

#include <exception>
#include <string>
#include <thread>
#include <typeinfo>

#include "privedm/errors.hpp"
#include "privedm/transport.hpp"

namespace privedm {

namespace detail {

inline std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown failure";
  }
}

inline bool is_channel_closed(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ChannelClosed&) {
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace detail

// Runs party A on the calling thread and party B on a second thread. A party
// that throws closes its endpoint so the peer is not left waiting. The
// reported failure is the root cause, not the peer's closed-channel error.
template <class FA, class FB>
void run_two_party(Endpoint& ea, Endpoint& eb, FA&& party_a, FB&& party_b) {
  std::exception_ptr err_a, err_b;
  std::thread tb([&] {
    try {
      party_b(eb);
    } catch (...) {
      err_b = std::current_exception();
      eb.close();
    }
  });
  try {
    party_a(ea);
  } catch (...) {
    err_a = std::current_exception();
    ea.close();
  }
  tb.join();
  if (!err_a && !err_b) return;
  char who = 'A';
  std::exception_ptr root = err_a;
  if (!err_a || (detail::is_channel_closed(err_a) && err_b && !detail::is_channel_closed(err_b))) {
    who = 'B';
    root = err_b;
  }
  throw PartyFailure(who, detail::describe(root), root);
}

}  // namespace privedm
