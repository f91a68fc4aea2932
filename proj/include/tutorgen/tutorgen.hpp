#pragma once

#include "tutorgen/annotate.hpp"
#include "tutorgen/corpus.hpp"
#include "tutorgen/dialog.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/export.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/metrics.hpp"
#include "tutorgen/record.hpp"
#include "tutorgen/study.hpp"
#include "tutorgen/study_http.hpp"
#include "tutorgen/synthgen.hpp"
#include "tutorgen/text.hpp"
