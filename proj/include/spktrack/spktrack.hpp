#pragma once

#include "spktrack/beamforming.hpp"
#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/embedding.hpp"
#include "spktrack/foa.hpp"
#include "spktrack/fragment.hpp"
#include "spktrack/hungarian.hpp"
#include "spktrack/metrics.hpp"
#include "spktrack/pipeline.hpp"
#include "spktrack/reassign.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/scene.hpp"
#include "spktrack/stft.hpp"
#include "spktrack/tracking.hpp"
#include "spktrack/voice.hpp"
#include "spktrack/wav.hpp"
