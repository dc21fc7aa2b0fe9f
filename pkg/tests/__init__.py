# slitforge tests
