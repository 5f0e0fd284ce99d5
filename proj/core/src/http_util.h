// Copyright 2026 The tpgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TPGD_SRC_HTTP_UTIL_H_
#define TPGD_SRC_HTTP_UTIL_H_

#include <chrono>
#include <optional>
#include <string>

namespace tpgd::internal {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// One POST. Returns nullopt on a transport failure (no response at all).
std::optional<HttpResponse> http_post(const std::string& url,
                                      const std::string& body,
                                      const std::string& content_type,
                                      std::chrono::milliseconds timeout);

}  // namespace tpgd::internal

#endif  // TPGD_SRC_HTTP_UTIL_H_
