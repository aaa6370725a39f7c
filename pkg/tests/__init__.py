# Test suite for the FDKP laboratory
