# Value types and errors
