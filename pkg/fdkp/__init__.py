# FDKP numerical laboratory
