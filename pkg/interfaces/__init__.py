# Telas (subcomandos) EzWOP
