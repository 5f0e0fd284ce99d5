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

#include "http_util.h"

#include <httplib.h>

#include "tpgd/errors.h"

namespace tpgd::internal {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("URL '" + url + "' has no scheme");
  }
  if (url.compare(0, scheme_end, "http") != 0) {
    throw Error("URL '" + url + "': only http:// endpoints are supported");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::optional<HttpResponse> http_post(const std::string& url,
                                      const std::string& body,
                                      const std::string& content_type,
                                      std::chrono::milliseconds timeout) {
  const SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto result = client.Post(parts.path, body, content_type);
  if (!result) return std::nullopt;
  return HttpResponse{result->status, result->body};
}

}  // namespace tpgd::internal
