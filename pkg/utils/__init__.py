# Motor numérico e infraestrutura EzWOP
