from tccbf._core.cache._cache import clear_cache
