# API package for the bounds engine (scan orchestration and report emission)
